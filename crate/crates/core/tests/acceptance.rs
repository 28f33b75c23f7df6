//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs under `cargo test` as a plain binary.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::{Duration, Instant};

use common::{random_atoms, slope, tree_violations, GridAtoms, SplitInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uquant::dyadic::{build_tree, quantize_normalized, split_counts};
use uquant::harness::{fit_rate, run_compare_random, run_sweep, ExperimentConfig, RateReport};
use uquant::lowerbounds::{increasing_estimate, lower_bound_sweep, RearrangementSpec, SweepFamily};
use uquant::transport::{en_1d_exact, multiscale_l, w_1d, w_discrete};
use uquant::{HalfOpenBox, Measure};

type Outcome = std::result::Result<String, String>;

fn config(json: &str, out: &tempfile::TempDir) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json_str(json, None).expect("acceptance configs are valid");
    c.output.dir = Some(out.path().to_path_buf());
    c
}

fn within(name: &str, v: Option<f64>, lo: f64, hi: f64) -> Result<f64, String> {
    match v {
        Some(s) if (lo..=hi).contains(&s) => Ok(s),
        Some(s) => Err(format!("{name} {s:.4} outside [{lo}, {hi}]")),
        None => Err(format!("{name} unavailable")),
    }
}

fn budget(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(())
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn unit_interval() -> Measure {
    Measure::uniform(HalfOpenBox::new(vec![0.0], vec![1.0]).unwrap()).unwrap()
}

fn c1_uniform_oracle() -> Outcome {
    let start = Instant::now();
    let m = unit_interval();
    let mut worst = 0.0f64;
    for n in [1u64, 4, 16, 256] {
        let nf = n as f64;
        for (p, want) in [
            (1.0, 1.0 / (4.0 * nf)),
            (2.0, 1.0 / (2.0 * 3f64.sqrt() * nf)),
        ] {
            let got = en_1d_exact(&m, n, p).map_err(|e| e.to_string())?;
            let rel = (got - want).abs() / want;
            worst = worst.max(rel);
            if rel > 1e-8 {
                return Err(format!("N={n} p={p}: {got} vs {want}"));
            }
        }
    }
    budget(Duration::from_secs(1), start)?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn c2_bernoulli_dichotomy() -> Outcome {
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"schema": 1, "d": 1, "p": 1, "N_list": [16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
            "trials": 200, "seed": 20240601,
            "measure": {"family": "bernoulli", "params": {"theta": 0.5}}}"#,
        &out,
    );
    let (r, _) = run_compare_random(&cfg).map_err(|e| e.to_string())?;
    let det = within("deterministic slope", r.deterministic_slope, -1.1, -0.9)?;
    let rnd = within("random slope", r.random_slope, -0.6, -0.4)?;
    budget(Duration::from_secs(120), start)?;
    Ok(format!("deterministic {det:.3}, random {rnd:.3}"))
}

fn c3_square_proxy() -> Outcome {
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"schema": 1, "d": 2, "p": 1, "N_list": [16, 32, 64, 128, 256, 512, 1024],
            "evaluator": "flow-vs-proxy", "proxy_size": 65536,
            "measure": {"family": "uniform", "params": {"lower": [-1, -1], "upper": [1, 1]}}}"#,
        &out,
    );
    let (r, _) = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let s = within("fitted slope", r.fitted_slope, -0.6, -0.4)?;
    if r.theory_slope != -0.5 {
        return Err(format!("theory slope {}", r.theory_slope));
    }
    budget(Duration::from_secs(600), start)?;
    Ok(format!(
        "fitted {s:.3} vs theory -0.5, proxy bound {:.2e}",
        r.proxy_bound.unwrap_or(f64::NAN)
    ))
}

fn c4_pareto_weak() -> Result<(String, RateReport), String> {
    let start = Instant::now();
    let out = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"schema": 1, "d": 1, "p": 2, "q": 4, "mode": "weak",
            "N_list": [16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
            "measure": {"family": "pareto", "params": {"q": 4}}}"#,
        &out,
    );
    let (r, _) = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let fitted = within("pipeline slope", r.fitted_slope, -0.33, -0.17)?;
    let oracle = within("oracle slope", r.oracle_slope, -0.33, -0.17)?;
    let scaled: Vec<(f64, f64)> = r
        .records
        .iter()
        .map(|x| (x.n as f64, (x.n as f64).powf(0.25) * x.oracle.unwrap()))
        .collect();
    let floor = scaled.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    if !(floor > 0.0) {
        return Err(format!("scaled oracle minimum {floor}"));
    }
    let trend = within("scaled oracle trend", fit_rate(&scaled).0, -0.05, 0.05)?;
    budget(Duration::from_secs(120), start)?;
    Ok((
        format!(
            "pipeline {fitted:.3}, oracle {oracle:.3}, scaled min {floor:.3}, trend {trend:.3}"
        ),
        r,
    ))
}

fn c5_optimality_family() -> Outcome {
    let start = Instant::now();
    let n_list: Vec<u64> = (2..=12).map(|k| 1u64 << k).collect();
    for &n in &n_list {
        let m = Measure::optimality(n, 0.75, 2.0).map_err(|e| e.to_string())?;
        let norm = m
            .moment(2.0)
            .map_err(|e| e.to_string())?
            .finite()
            .unwrap_or(f64::INFINITY);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(format!("N={n}: second moment {norm}"));
        }
    }
    let r = lower_bound_sweep(
        &SweepFamily::Optimality {
            gamma: 0.75,
            q: 2.0,
        },
        1.0,
        &n_list,
    )
    .map_err(|e| e.to_string())?;
    if !(r.min_scaled_oracle > 0.0) {
        return Err(format!("scaled oracle minimum {}", r.min_scaled_oracle));
    }
    let s = within("scaled oracle slope", r.scaled_oracle_slope, -0.05, 0.05)?;
    budget(Duration::from_secs(120), start)?;
    Ok(format!(
        "scaled min {:.4}, slope {s:.4}",
        r.min_scaled_oracle
    ))
}

fn c6_lemma_suites() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for t in 0..10_000 {
        let inst = SplitInstance::random(&mut rng);
        let counts =
            split_counts(&inst.masses(), inst.k, inst.n).map_err(|e| format!("split {t}: {e}"))?;
        if !inst.holds(&counts) {
            return Err(format!("split {t}: {inst:?} -> {counts:?}"));
        }
    }
    let mut trees = 0;
    for t in 0..1000 {
        let dim = 1 + t % 3;
        let count = rng.random_range(1..=60);
        let atoms = GridAtoms::random(&mut rng, dim, count, 2);
        let m: Measure = atoms.atoms().into();
        let w = atoms.total();
        let n_budget = rng.random_range(1..=2000u64);
        let depth = rng.random_range(0..=(9 / dim as u32));
        let (&n, &c) = atoms
            .annulus_weights()
            .iter()
            .nth(t % atoms.annulus_weights().len())
            .unwrap();
        let exact = n_budget * c;
        let root = exact / w + u64::from(exact % w != 0 && rng.random_bool(0.5));
        let tree =
            build_tree(&m, n, root, depth, n_budget).map_err(|e| format!("tree {t}: {e}"))?;
        let bad = tree_violations(&tree, &atoms);
        if !bad.is_empty() {
            return Err(format!("tree {t}: {}", bad.join("; ")));
        }
        trees += 1;
    }
    budget(Duration::from_secs(60), start)?;
    Ok(format!("10000 splits, {trees} trees, zero violations"))
}

fn c7_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for t in 0..500 {
        let p = [0.5, 1.0, 1.5, 2.0, 3.0][t % 5];
        let (k1, k2) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let a = random_atoms(&mut rng, 1, k1, 3.0);
        let b = random_atoms(&mut rng, 1, k2, 3.0);
        let exact = w_1d(&a.clone().into(), &b.clone().into(), p)
            .map_err(|e| e.to_string())?
            .value;
        let flow = w_discrete(&a, &b, p).map_err(|e| e.to_string())?.value;
        let rel = (exact - flow).abs() / exact.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-7 {
            return Err(format!("pair {t} p={p}: quantile {exact} vs flow {flow}"));
        }
    }
    for t in 0..500 {
        let p = [1.0, 1.5, 2.0][t % 3];
        let dim = 1 + t % 3;
        let mut draw = || {
            let k = rng.random_range(1..=8);
            random_atoms(&mut rng, dim, k, 2.0)
        };
        let (a, b, c) = (draw(), draw(), draw());
        let w = |x, y| {
            w_discrete(x, y, p)
                .map(|r| r.value)
                .map_err(|e| e.to_string())
        };
        let (ab, ba, bc, ac) = (w(&a, &b)?, w(&b, &a)?, w(&b, &c)?, w(&a, &c)?);
        if ab != ba {
            return Err(format!("triple {t}: asymmetric {ab} vs {ba}"));
        }
        if ac > ab + bc + 1e-9 {
            return Err(format!("triple {t}: triangle {ac} > {ab} + {bc}"));
        }
    }
    budget(Duration::from_secs(60), start)?;
    Ok(format!("500 pairs (max rel {worst:.1e}), 500 triples"))
}

fn c8_multiscale_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ratios = Vec::new();
    for i in 0..100usize {
        let n = 1usize << (3 + i % 5);
        let dim = 1 + (i / 5) % 3;
        let p = [1.0, 2.0][(i / 15) % 2];
        let pts = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mu = uquant::measures::Atoms::uniform(dim, pts).unwrap();
        let nu = random_atoms(&mut rng, dim, n, 2.0);
        let w = w_discrete(&mu, &nu, p).map_err(|e| e.to_string())?.p_cost;
        let l = multiscale_l(&mu.into(), &nu.into(), p, 1, 12).map_err(|e| e.to_string())?;
        let ratio = w / (l.value + l.truncation_bound);
        if !ratio.is_finite() || !(ratio > 0.0) {
            return Err(format!("pair {i}: ratio {ratio}"));
        }
        ratios.push((n as f64, ratio));
    }
    let s = slope(&ratios);
    let max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    if s > 0.05 {
        return Err(format!("log-ratio trend {s:.4} > 0.05"));
    }
    budget(Duration::from_secs(120), start)?;
    Ok(format!("corpus constant {max:.3}, trend {s:.4}"))
}

fn c9_lower_bound_soundness(d1_runs: &[RateReport]) -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    let fixed = [
        unit_interval(),
        Measure::pareto(3.0).unwrap(),
        Measure::pareto(4.0).unwrap(),
    ];
    for k in 1..=10 {
        let n = 1u64 << k;
        for p in [0.5, 1.0, 2.0] {
            if p < 1.0 && n > 128 {
                continue;
            }
            let family = Measure::optimality(n, 0.75, 2.0).unwrap();
            let cases = fixed
                .iter()
                .map(|m| (m, 0))
                .chain(std::iter::once((&family, 1)));
            for (m, j) in cases {
                let spec = RearrangementSpec::from_measure(m).map_err(|e| e.to_string())?;
                if m.moment(p).map_err(|e| e.to_string())?.finite().is_none() {
                    continue;
                }
                let b =
                    increasing_estimate(&spec, j.min(n - 1), n, n, p).map_err(|e| e.to_string())?;
                let e = en_1d_exact(m, n, p).map_err(|e| e.to_string())?;
                if b > e + 1e-9 {
                    return Err(format!(
                        "{} N={n} p={p}: bound {b} > oracle {e}",
                        spec.label()
                    ));
                }
                checks += 1;
            }
        }
    }
    let mut runs = 0;
    for r in d1_runs {
        if r.oracle_violations > 0 {
            return Err(format!(
                "{}: {} pipeline errors below the oracle",
                r.measure, r.oracle_violations
            ));
        }
        runs += r.records.len();
    }
    for (m, q) in [
        (unit_interval(), 8.0),
        (Measure::bernoulli(1.0 / 3.0).unwrap(), 8.0),
        (Measure::pareto(3.0).unwrap(), 2.5),
    ] {
        for p in [0.5, 1.0, 2.0] {
            let params = uquant::dyadic::QuantizeParams {
                mode: uquant::dyadic::Mode::Strong,
                p,
                q: uquant::Extended::Finite(q),
            };
            for n in [3u64, 10, 64, 100] {
                let q = quantize_normalized(&m, n, &params).map_err(|e| e.to_string())?;
                let cloud: Measure = q.cloud.to_atoms().map_err(|e| e.to_string())?.into();
                let err = w_1d(&m, &cloud, p).map_err(|e| e.to_string())?.value;
                let e = en_1d_exact(&m, n, p).map_err(|e| e.to_string())?;
                if err < e - 1e-9 {
                    return Err(format!("N={n} p={p}: pipeline {err} < oracle {e}"));
                }
                runs += 1;
            }
        }
    }
    budget(Duration::from_secs(300), start)?;
    Ok(format!(
        "{checks} bound checks, {runs} pipeline runs, zero violations"
    ))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome, t: Duration| match outcome {
        Ok(detail) => println!("PASS {id} {name}: {detail} [{t:.2?}]"),
        Err(why) => {
            failed += 1;
            println!("FAIL {id} {name}: {why} [{t:.2?}]");
        }
    };
    macro_rules! criterion {
        ($id:expr, $name:expr, $body:expr) => {{
            let t = Instant::now();
            let outcome = $body;
            report($id, $name, outcome, t.elapsed());
        }};
    }

    criterion!(1, "uniform oracle closed forms", c1_uniform_oracle());
    criterion!(
        2,
        "Bernoulli deterministic vs random rates",
        c2_bernoulli_dichotomy()
    );
    criterion!(3, "d > p rate on the square via proxy", c3_square_proxy());
    let mut d1_runs = Vec::new();
    criterion!(
        4,
        "Pareto weak-moment rate and optimality",
        c4_pareto_weak().map(|(s, r)| {
            d1_runs.push(r);
            s
        })
    );
    criterion!(
        5,
        "optimality family normalization and rate",
        c5_optimality_family()
    );
    criterion!(6, "split and tree conclusions", c6_lemma_suites());
    criterion!(
        7,
        "1D oracle equivalence and metric axioms",
        c7_oracle_equivalence()
    );
    criterion!(
        8,
        "multiscale bound consistency",
        c8_multiscale_consistency()
    );
    criterion!(9, "lower-bound and infimum soundness", {
        let out = tempfile::tempdir().unwrap();
        let uniform = config(
            r#"{"schema": 1, "d": 1, "p": 1, "N_list": [8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
                "measure": {"family": "uniform", "params": {"lower": [0], "upper": [1]}}}"#,
            &out,
        );
        match run_sweep(&uniform) {
            Ok((r, _)) => {
                d1_runs.push(r);
                c9_lower_bound_soundness(&d1_runs)
            }
            Err(e) => Err(e.to_string()),
        }
    });

    println!("{} criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
