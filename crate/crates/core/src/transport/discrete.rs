use std::path::Path;

use super::flow::{NetworkSimplex, SolveStatus};
use super::{Certificate, Method, TransportResult};
use crate::error::{Error, Result};
use crate::measures::Atoms;

/// Largest `n_μ · n_ν` the exact solver accepts by default.
pub const DENSE_PAIR_LIMIT: usize = 10_000_000;
/// Total integer mass used to discretize the marginals.
const SUPPLY_SCALE: f64 = (1u64 << 40) as f64;
/// Integer cost resolution: costs are rounded to multiples of `max_cost / 2^32`.
const COST_SCALE: f64 = (1u64 << 32) as f64;
/// Instances up to this many pairs get every arc up front.
const FULL_GRAPH_PAIRS: usize = 1 << 16;
const SEED_NEIGHBORS: usize = 6;
const PRICE_PER_SOURCE: usize = 16;

/// One arc of the optimal coupling: `(i, j, mass)`.
pub type PlanEntry = (usize, usize, f64);

/// Exact `W_p(μ, ν)` between finitely supported measures by min-cost flow.
pub fn w_discrete(mu: &Atoms, nu: &Atoms, p: f64) -> Result<TransportResult> {
    w_discrete_with_limit(mu, nu, p, DENSE_PAIR_LIMIT).map(|(r, _)| r)
}

/// As [`w_discrete`] with an explicit pair guard, also returning the coupling.
///
/// The solver works on a sparse candidate set (nearest neighbours), prices
/// every pair against the optimal potentials, adds violating arcs, and
/// repeats; it stops only when no pair has negative reduced cost, so the
/// result is optimal over the full bipartite graph. Memory stays linear in
/// the support sizes plus the candidate set.
pub fn w_discrete_with_limit(
    mu: &Atoms,
    nu: &Atoms,
    p: f64,
    max_pairs: usize,
) -> Result<(TransportResult, Vec<PlanEntry>)> {
    let sparse = mu.len().saturating_mul(nu.len()) > FULL_GRAPH_PAIRS;
    // Solving in one canonical orientation makes the value exactly symmetric.
    if canonical_order(nu, mu).is_lt() {
        let (r, plan) = solve(nu, mu, p, max_pairs, sparse)?;
        return Ok((r, plan.into_iter().map(|(j, i, w)| (i, j, w)).collect()));
    }
    solve(mu, nu, p, max_pairs, sparse)
}

fn canonical_order(a: &Atoms, b: &Atoms) -> std::cmp::Ordering {
    let floats = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    };
    a.len()
        .cmp(&b.len())
        .then_with(|| floats(a.weights(), b.weights()))
        .then_with(|| {
            (0..a.len())
                .map(|i| floats(a.point(i), b.point(i)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

fn solve(
    mu: &Atoms,
    nu: &Atoms,
    p: f64,
    max_pairs: usize,
    sparse: bool,
) -> Result<(TransportResult, Vec<PlanEntry>)> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "transport order p must be positive, got {p}"
        )));
    }
    let (n, m) = (mu.len(), nu.len());
    let pairs = n.saturating_mul(m);
    if pairs > max_pairs {
        let keep = ((max_pairs as f64).sqrt()) as usize;
        return Err(Error::ResourceGuard(format!(
            "{n} × {m} = {pairs} atom pairs exceeds the exact-solver limit of {max_pairs}; \
             subsample both measures to at most ~{keep} atoms"
        )));
    }
    let cost = |i: usize, j: usize| -> f64 { dist(mu.point(i), nu.point(j)).powf(p) };
    let max_cost = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| cost(i, j))
        .fold(0.0f64, f64::max);
    if max_cost == 0.0 {
        let plan = trivial_plan(mu, nu);
        return Ok((exact_result(0.0, p, &plan, 0.0, 0.0, 0.0, 0), plan));
    }
    let icost = |i: usize, j: usize| -> i64 { (cost(i, j) / max_cost * COST_SCALE).round() as i64 };

    let mut supply = integer_masses(mu.weights());
    supply.extend(integer_masses(nu.weights()).into_iter().map(|v| -v));
    let mut ns = NetworkSimplex::new(&supply, COST_SCALE as i64);

    if !sparse {
        for i in 0..n {
            for j in 0..m {
                ns.add_arc(i, n + j, icost(i, j));
            }
        }
    } else {
        seed_candidates(&mut ns, n, m, &cost, &icost);
    }

    let mut rounds = 0;
    loop {
        // A candidate set may be infeasible on its own; the artificial arcs
        // then carry mass at a prohibitive cost and pricing repairs it.
        let status = ns.solve();
        rounds += 1;
        if sparse && price_and_add(&mut ns, n, m, &icost) > 0 {
            continue;
        }
        if status != SolveStatus::Optimal {
            return Err(Error::Contract(
                "transport flow left mass on artificial arcs".into(),
            ));
        }
        break;
    }

    // Value from true costs along the optimal plan.
    let mut plan = Vec::new();
    let mut total = 0.0;
    let mut slack = 0i64;
    for (e, a, b) in ns.real_arcs().collect::<Vec<_>>() {
        let f = ns.flow(e);
        if f > 0 {
            let j = b - n;
            let w = f as f64 / SUPPLY_SCALE;
            total += w * cost(a, j);
            plan.push((a, j, w));
            slack = slack.max(ns.reduced_cost(a, b, icost(a, j)).abs());
        }
    }
    let mut most_negative = 0i64;
    for i in 0..n {
        for j in 0..m {
            most_negative = most_negative.min(ns.reduced_cost(i, n + j, icost(i, j)));
        }
    }
    let to_real = max_cost / COST_SCALE;
    let marginal = marginal_residual(mu, nu, &plan);
    let mut result = exact_result(
        total,
        p,
        &plan,
        marginal,
        slack as f64 * to_real,
        -(most_negative as f64) * to_real,
        ns.pivots(),
    );
    if let Some(c) = result.certificate.as_mut() {
        c.rounds = rounds;
        c.cost_rounding_bound = to_real;
    }
    Ok((result, plan))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Largest-remainder integer masses summing to `2^40`.
fn integer_masses(weights: &[f64]) -> Vec<i64> {
    let total: f64 = weights.iter().sum();
    let scaled: Vec<f64> = weights.iter().map(|w| w / total * SUPPLY_SCALE).collect();
    let mut out: Vec<i64> = scaled.iter().map(|v| v.floor() as i64).collect();
    let short = SUPPLY_SCALE as i64 - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - out[a] as f64;
        let fb = scaled[b] - out[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    if short >= 0 {
        for k in 0..short as usize {
            out[order[k % order.len()]] += 1;
        }
    } else {
        for k in 0..(-short) as usize {
            let i = order[order.len() - 1 - k % order.len()];
            out[i] -= 1;
        }
    }
    out
}

fn seed_candidates<C, I>(ns: &mut NetworkSimplex, n: usize, m: usize, cost: &C, icost: &I)
where
    C: Fn(usize, usize) -> f64,
    I: Fn(usize, usize) -> i64,
{
    let mut chosen = std::collections::HashSet::new();
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(m.max(n));
    for i in 0..n {
        scratch.clear();
        scratch.extend((0..m).map(|j| (cost(i, j), j)));
        let k = SEED_NEIGHBORS.min(m);
        scratch.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        for &(_, j) in &scratch[..k] {
            chosen.insert((i, j));
        }
    }
    for j in 0..m {
        scratch.clear();
        scratch.extend((0..n).map(|i| (cost(i, j), i)));
        let k = SEED_NEIGHBORS.min(n);
        scratch.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        for &(_, i) in &scratch[..k] {
            chosen.insert((i, j));
        }
    }
    let mut arcs: Vec<(usize, usize)> = chosen.into_iter().collect();
    arcs.sort_unstable();
    for (i, j) in arcs {
        ns.add_arc(i, n + j, icost(i, j));
    }
}

/// Adds, per source and per sink, the most violated pairs; returns the count.
fn price_and_add<I: Fn(usize, usize) -> i64>(
    ns: &mut NetworkSimplex,
    n: usize,
    m: usize,
    icost: &I,
) -> usize {
    let mut best_for_sink: Vec<(i64, usize)> = vec![(0, usize::MAX); m];
    let mut picks: Vec<(usize, usize)> = Vec::new();
    let mut row: Vec<(i64, usize)> = Vec::new();
    for i in 0..n {
        row.clear();
        for j in 0..m {
            let rc = ns.reduced_cost(i, n + j, icost(i, j));
            if rc < 0 {
                row.push((rc, j));
                if rc < best_for_sink[j].0 {
                    best_for_sink[j] = (rc, i);
                }
            }
        }
        if row.len() > PRICE_PER_SOURCE {
            row.select_nth_unstable(PRICE_PER_SOURCE - 1);
            row.truncate(PRICE_PER_SOURCE);
        }
        picks.extend(row.iter().map(|&(_, j)| (i, j)));
    }
    picks.extend(
        best_for_sink
            .iter()
            .enumerate()
            .filter(|(_, b)| b.1 != usize::MAX)
            .map(|(j, b)| (b.1, j)),
    );
    picks.sort_unstable();
    picks.dedup();
    for &(i, j) in &picks {
        ns.add_arc(i, n + j, icost(i, j));
    }
    picks.len()
}

fn trivial_plan(mu: &Atoms, nu: &Atoms) -> Vec<PlanEntry> {
    // All atoms coincide: the product coupling is optimal.
    let mut plan = Vec::new();
    for i in 0..mu.len() {
        for j in 0..nu.len() {
            plan.push((i, j, mu.weight(i) * nu.weight(j)));
        }
    }
    plan
}

fn marginal_residual(mu: &Atoms, nu: &Atoms, plan: &[PlanEntry]) -> f64 {
    let mut row = vec![0.0; mu.len()];
    let mut col = vec![0.0; nu.len()];
    for &(i, j, w) in plan {
        row[i] += w;
        col[j] += w;
    }
    let r = row.iter().zip(mu.weights()).map(|(a, b)| (a - b).abs());
    let c = col.iter().zip(nu.weights()).map(|(a, b)| (a - b).abs());
    r.chain(c).fold(0.0, f64::max)
}

fn exact_result(
    cost: f64,
    p: f64,
    plan: &[PlanEntry],
    marginal: f64,
    slack: f64,
    dual: f64,
    pivots: u64,
) -> TransportResult {
    TransportResult {
        value: cost.max(0.0).powf(1.0 / p),
        p,
        method: Method::MincostFlow,
        p_cost: cost.max(0.0),
        p_below_one: p < 1.0,
        truncation_bound: None,
        certificate: Some(Certificate {
            marginal_residual: marginal,
            slackness_residual: slack,
            dual_infeasibility: dual,
            plan_arcs: plan.len(),
            pivots,
            rounds: 0,
            cost_rounding_bound: 0.0,
        }),
    }
}

/// Writes a coupling as `source,target,mass` rows.
pub fn write_plan_csv<P: AsRef<Path>>(plan: &[PlanEntry], path: P) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["source", "target", "mass"])?;
    for &(i, j, m) in plan {
        w.write_record([i.to_string(), j.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
