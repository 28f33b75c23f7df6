//! Random instances and exact integer checkers shared by the property and
//! acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use uquant::dyadic::AllocationTree;
use uquant::measures::Atoms;

/// A split instance with `aᵢ = rᵢ / (N·D)`, so every conclusion can be
/// checked in integers.
#[derive(Clone, Debug)]
pub struct SplitInstance {
    pub r: Vec<u64>,
    pub den: u64,
    pub k: u64,
    pub n: u64,
}

impl SplitInstance {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.random_range(1..=5000u64);
        let den = 1u64 << rng.random_range(0..12);
        let parts = rng.random_range(1..=16usize);
        let scale = rng.random_range(1..=3 * n * den);
        let r: Vec<u64> = (0..parts).map(|_| rng.random_range(0..=scale)).collect();
        let total: u64 = r.iter().sum();
        // k/N within 1/N of Σa: |Σr − k·D| ≤ D
        let lo = total.saturating_sub(den).div_ceil(den);
        let hi = (total + den) / den;
        let k = rng.random_range(lo..=hi);
        Self { r, den, k, n }
    }

    pub fn masses(&self) -> Vec<f64> {
        let nd = (self.n * self.den) as f64;
        self.r.iter().map(|&v| v as f64 / nd).collect()
    }

    /// `Σkᵢ = k` and `|N·aᵢ − kᵢ| ≤ 1` for every part.
    pub fn holds(&self, counts: &[u64]) -> bool {
        counts.len() == self.r.len()
            && counts.iter().sum::<u64>() == self.k
            && self
                .r
                .iter()
                .zip(counts)
                .all(|(&r, &c)| (r as i128 - (c * self.den) as i128).abs() <= self.den as i128)
    }
}

/// Atoms on the grid `2^{−6}ℤ^d` inside `(−2^{radius}, 2^{radius}]^d` with
/// integer weights `cᵢ / W`. Grid points land on cell faces often, which
/// exercises the half-open convention.
#[derive(Clone, Debug)]
pub struct GridAtoms {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<u64>,
}

impl GridAtoms {
    pub fn random<R: Rng>(rng: &mut R, dim: usize, count: usize, radius: u32) -> Self {
        let ticks = 64i64 << radius;
        let points = (0..count)
            .map(|_| {
                (0..dim)
                    .map(|_| rng.random_range(-ticks + 1..=ticks) as f64 / 64.0)
                    .collect()
            })
            .collect();
        let weights = (0..count).map(|_| rng.random_range(1..=20u64)).collect();
        Self {
            dim,
            points,
            weights,
        }
    }

    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn atoms(&self) -> Atoms {
        let w = self.total() as f64;
        Atoms::new(
            self.dim,
            self.points.clone(),
            self.weights.iter().map(|&c| c as f64 / w).collect(),
        )
        .unwrap()
    }

    /// Smallest `n` with `x ∈ Q_n`.
    pub fn annulus_of(x: &[f64]) -> u32 {
        (0..)
            .find(|&n| x.iter().all(|&v| v > -(2f64.powi(n)) && v <= 2f64.powi(n)))
            .unwrap() as u32
    }

    /// Integer weight of each annulus.
    pub fn annulus_weights(&self) -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        for (x, &c) in self.points.iter().zip(&self.weights) {
            *out.entry(Self::annulus_of(x)).or_insert(0) += c;
        }
        out
    }

    /// Integer weight of every level-`level` cell of annulus `n`, from the
    /// closed-form lattice index of each atom.
    pub fn cell_weights(&self, n: u32, level: u32) -> BTreeMap<Vec<u64>, u64> {
        let mut out = BTreeMap::new();
        for (x, &c) in self.points.iter().zip(&self.weights) {
            if Self::annulus_of(x) != n {
                continue;
            }
            let idx: Vec<u64> = x
                .iter()
                .map(|&v| {
                    ((v / 2f64.powi(n as i32) + 1.0) * 2f64.powi(level as i32 - 1)).ceil() as u64
                        - 1
                })
                .collect();
            *out.entry(idx).or_insert(0) += c;
        }
        out
    }
}

/// Every tree conclusion checked exactly against integer cell weights:
/// root count, children summing to parents, `|N·μ(F) − k_F| ≤ 1` for stored
/// and pruned cells alike, and leaves summing to the annulus budget.
pub fn tree_violations(tree: &AllocationTree, atoms: &GridAtoms) -> Vec<String> {
    let mut bad = Vec::new();
    let w = atoms.total() as i128;
    let nb = tree.budget as i128;
    if tree.levels[0].iter().map(|c| c.count).sum::<u64>() != tree.root_count {
        bad.push("root count".into());
    }
    for level in 0..=tree.depth {
        let truth = atoms.cell_weights(tree.n, level);
        let stored = &tree.levels[level as usize];
        for cell in stored {
            let c = *truth.get(&cell.idx).unwrap_or(&0) as i128;
            if (nb * c - cell.count as i128 * w).abs() > w {
                bad.push(format!(
                    "level {level} cell {:?}: count {} weight {c}/{w}",
                    cell.idx, cell.count
                ));
            }
        }
        for (idx, &c) in &truth {
            if tree.count(level, idx) == 0 && nb * c as i128 > w {
                bad.push(format!(
                    "level {level} cell {idx:?} pruned with weight {c}/{w}"
                ));
            }
        }
        if level > 0 {
            for parent in &tree.levels[level as usize - 1] {
                let sum: u64 = stored
                    .iter()
                    .filter(|c| c.idx.iter().zip(&parent.idx).all(|(a, b)| a / 2 == *b))
                    .map(|c| c.count)
                    .sum();
                if sum != parent.count {
                    bad.push(format!(
                        "children of {:?} at level {}",
                        parent.idx,
                        level - 1
                    ));
                }
            }
        }
    }
    if tree.leaves().iter().map(|c| c.count).sum::<u64>() != tree.root_count {
        bad.push("leaves do not sum to N_n".into());
    }
    bad
}

/// Random atoms with random weights in `(−s, s]^d`.
pub fn random_atoms<R: Rng>(rng: &mut R, dim: usize, count: usize, s: f64) -> Atoms {
    let points = (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-s..s)).collect())
        .collect();
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Atoms::new(dim, points, raw.iter().map(|v| v / total).collect()).unwrap()
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0.ln() - mx) * (p.1.ln() - my))
        .sum();
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    sxy / sxx
}
